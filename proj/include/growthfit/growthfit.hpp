#pragma once

#include "deterministic.hpp"
#include "diagnostics.hpp"
#include "inference.hpp"
#include "io.hpp"
#include "kalman.hpp"
#include "parallel.hpp"
#include "params.hpp"
#include "predictive.hpp"
#include "random.hpp"
#include "sde.hpp"
#include "synthetic.hpp"
#include "transition.hpp"
