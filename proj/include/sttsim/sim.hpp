#pragma once

// Umbrella header.

#include "sttsim/cache.hpp"
#include "sttsim/common.hpp"
#include "sttsim/config.hpp"
#include "sttsim/device.hpp"
#include "sttsim/endurance.hpp"
#include "sttsim/geometry.hpp"
#include "sttsim/hierarchy.hpp"
#include "sttsim/policy.hpp"
#include "sttsim/queues.hpp"
#include "sttsim/report.hpp"
#include "sttsim/trace.hpp"
