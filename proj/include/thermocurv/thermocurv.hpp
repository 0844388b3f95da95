#pragma once

// Umbrella header: thermodynamic curvature of two-variable potentials.

#include "thermocurv/catalog.hpp"
#include "thermocurv/davies.hpp"
#include "thermocurv/errors.hpp"
#include "thermocurv/expression.hpp"
#include "thermocurv/flags.hpp"
#include "thermocurv/geometry.hpp"
#include "thermocurv/jet.hpp"
#include "thermocurv/response.hpp"
#include "thermocurv/roots.hpp"
#include "thermocurv/state.hpp"
