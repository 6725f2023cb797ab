#pragma once

#include "nonherm/error.hpp"
#include "nonherm/lacore.hpp"
#include "nonherm/potential.hpp"
#include "nonherm/discretize.hpp"
#include "nonherm/parallel.hpp"
#include "nonherm/spectra.hpp"
#include "nonherm/pseudospec.hpp"
#include "nonherm/pseudomode.hpp"
#include "nonherm/metric.hpp"
