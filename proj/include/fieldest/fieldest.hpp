#pragma once

#include "fieldest/aoi.hpp"
#include "fieldest/error.hpp"
#include "fieldest/model.hpp"
#include "fieldest/optimize.hpp"
#include "fieldest/rng.hpp"
#include "fieldest/sim.hpp"
#include "fieldest/spatial.hpp"

namespace fieldest {
inline constexpr char kVersion[] = "0.1.0";
}
