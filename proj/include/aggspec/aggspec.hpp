#pragma once

#include "aggspec/errors.hpp"
#include "aggspec/excitonics.hpp"
#include "aggspec/geometry.hpp"
#include "aggspec/grid.hpp"
#include "aggspec/lineshape.hpp"
#include "aggspec/runner.hpp"
#include "aggspec/scenario.hpp"
#include "aggspec/spectra.hpp"
