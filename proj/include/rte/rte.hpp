#pragma once

#include "rte/error.hpp"
#include "rte/infocore.hpp"
#include "rte/ingest.hpp"
#include "rte/report.hpp"
#include "rte/surrogate.hpp"
#include "rte/symbolize.hpp"
#include "rte/synth.hpp"
#include "rte/transfer.hpp"
