#pragma once

#include "bels/config_io.hpp"
#include "bels/ensemble.hpp"
#include "bels/errors.hpp"
#include "bels/feature_space.hpp"
#include "bels/linalg.hpp"
#include "bels/matrix.hpp"
#include "bels/output_layer.hpp"
#include "bels/prequential.hpp"
#include "bels/rng.hpp"
#include "bels/snapshot.hpp"
#include "bels/streams.hpp"
