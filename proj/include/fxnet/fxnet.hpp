#pragma once

#include "fxnet/checkpoint.hpp"
#include "fxnet/data_io.hpp"
#include "fxnet/ekf.hpp"
#include "fxnet/elman.hpp"
#include "fxnet/errors.hpp"
#include "fxnet/evaluate.hpp"
#include "fxnet/linalg.hpp"
#include "fxnet/mlp.hpp"
#include "fxnet/plot_csv.hpp"
#include "fxnet/preprocess.hpp"
#include "fxnet/random.hpp"
#include "fxnet/rprop.hpp"
#include "fxnet/training_report.hpp"
