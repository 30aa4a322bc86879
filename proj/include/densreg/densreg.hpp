#pragma once

// Umbrella header for the density registration toolkit.

#include "densreg/alpha_fit.hpp"
#include "densreg/calculus.hpp"
#include "densreg/common.hpp"
#include "densreg/density.hpp"
#include "densreg/diffeo.hpp"
#include "densreg/field.hpp"
#include "densreg/grid.hpp"
#include "densreg/interp.hpp"
#include "densreg/io.hpp"
#include "densreg/oit.hpp"
#include "densreg/poisson.hpp"
#include "densreg/synth.hpp"
#include "densreg/wddr.hpp"
