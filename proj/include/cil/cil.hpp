#pragma once

#include "cil/distributed.hpp"
#include "cil/libsvm.hpp"
#include "cil/losses.hpp"
#include "cil/metrics.hpp"
#include "cil/normalizer.hpp"
#include "cil/online.hpp"
#include "cil/prox.hpp"
#include "cil/sparse_vector.hpp"
#include "cil/svdd.hpp"
#include "cil/synthetic.hpp"
