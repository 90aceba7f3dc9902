#pragma once

#include "mixreg/bootstrap.hpp"
#include "mixreg/density.hpp"
#include "mixreg/distributions.hpp"
#include "mixreg/errors.hpp"
#include "mixreg/euclidean.hpp"
#include "mixreg/functional.hpp"
#include "mixreg/io.hpp"
#include "mixreg/mc.hpp"
#include "mixreg/model.hpp"
#include "mixreg/moments.hpp"
#include "mixreg/parallel.hpp"
#include "mixreg/rng.hpp"
#include "mixreg/simulator.hpp"
