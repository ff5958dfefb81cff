#pragma once

// Umbrella header for the whole library.

#include "pllay/complex.hpp"
#include "pllay/data.hpp"
#include "pllay/datasets.hpp"
#include "pllay/dtm.hpp"
#include "pllay/io.hpp"
#include "pllay/kdtree.hpp"
#include "pllay/landscape.hpp"
#include "pllay/layer.hpp"
#include "pllay/metrics.hpp"
#include "pllay/nn.hpp"
#include "pllay/parallel.hpp"
#include "pllay/persistence.hpp"
#include "pllay/rng.hpp"
