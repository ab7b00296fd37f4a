#pragma once

#include "dualabsa/numerics/grad_check.hpp"
#include "dualabsa/numerics/graph.hpp"
#include "dualabsa/numerics/ops.hpp"
#include "dualabsa/numerics/param_store.hpp"
#include "dualabsa/numerics/tensor.hpp"
