#pragma once

#include "pmlp/adam.hpp"
#include "pmlp/dataset.hpp"
#include "pmlp/error.hpp"
#include "pmlp/experiments.hpp"
#include "pmlp/extrapolation.hpp"
#include "pmlp/gntk.hpp"
#include "pmlp/graph.hpp"
#include "pmlp/linalg.hpp"
#include "pmlp/matrix.hpp"
#include "pmlp/models.hpp"
#include "pmlp/montecarlo.hpp"
#include "pmlp/network.hpp"
#include "pmlp/rng.hpp"
#include "pmlp/train.hpp"
#include "pmlp/transition.hpp"
