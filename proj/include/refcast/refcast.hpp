#pragma once

#include "refcast/biassim.hpp"
#include "refcast/core_model.hpp"
#include "refcast/error.hpp"
#include "refcast/governance.hpp"
#include "refcast/ingest.hpp"
#include "refcast/ks_test.hpp"
#include "refcast/rcf_engine.hpp"
#include "refcast/refclass.hpp"
#include "refcast/stats.hpp"
