#pragma once

#include "plgp/analysis.hpp"
#include "plgp/dml.hpp"
#include "plgp/experiment.hpp"
#include "plgp/gaussian.hpp"
#include "plgp/hyperopt.hpp"
#include "plgp/io.hpp"
#include "plgp/kernels.hpp"
#include "plgp/model.hpp"
#include "plgp/synthetic.hpp"
