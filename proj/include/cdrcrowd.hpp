#pragma once

#include "cdrcrowd/attendance.hpp"
#include "cdrcrowd/cdr_store.hpp"
#include "cdrcrowd/csv.hpp"
#include "cdrcrowd/errors.hpp"
#include "cdrcrowd/geo.hpp"
#include "cdrcrowd/mobility_stats.hpp"
#include "cdrcrowd/pipeline.hpp"
#include "cdrcrowd/radius.hpp"
#include "cdrcrowd/regression.hpp"
#include "cdrcrowd/report.hpp"
#include "cdrcrowd/run.hpp"
#include "cdrcrowd/scenarios.hpp"
#include "cdrcrowd/simulator.hpp"
#include "cdrcrowd/types.hpp"
