#pragma once

#include "edge/autodiff.hpp"
#include "edge/batch.hpp"
#include "edge/corpus.hpp"
#include "edge/generator.hpp"
#include "edge/inference.hpp"
#include "edge/kernels.hpp"
#include "edge/metrics.hpp"
#include "edge/model.hpp"
#include "edge/random.hpp"
#include "edge/reform.hpp"
#include "edge/tensor.hpp"
#include "edge/text.hpp"
#include "edge/trainer.hpp"
