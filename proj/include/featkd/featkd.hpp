#pragma once

// Umbrella header for the feature-mimicking distillation library.

#include "featkd/dataset.hpp"
#include "featkd/grad_check.hpp"
#include "featkd/losses.hpp"
#include "featkd/lsh.hpp"
#include "featkd/matrix.hpp"
#include "featkd/model.hpp"
#include "featkd/quadrature.hpp"
#include "featkd/rng.hpp"
#include "featkd/serialize.hpp"
#include "featkd/special.hpp"
#include "featkd/theory.hpp"
#include "featkd/trainer.hpp"
#include "featkd/version.hpp"
