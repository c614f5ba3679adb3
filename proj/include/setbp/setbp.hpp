#pragma once

#include "setbp/assoc/loopy_bp.hpp"
#include "setbp/core/errors.hpp"
#include "setbp/core/fov.hpp"
#include "setbp/core/gaussian.hpp"
#include "setbp/core/log_math.hpp"
#include "setbp/core/mixture.hpp"
#include "setbp/core/rfs.hpp"
#include "setbp/core/seed.hpp"
#include "setbp/factors/set_factors.hpp"
#include "setbp/metrics/gospa.hpp"
#include "setbp/metrics/hungarian.hpp"
#include "setbp/oracle/discrete_sets.hpp"
#include "setbp/scenario/scenario.hpp"
#include "setbp/slam/filter.hpp"
#include "setbp/slam/sensor.hpp"
