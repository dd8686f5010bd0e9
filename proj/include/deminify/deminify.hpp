#pragma once

#include "deminify/autoencoder.hpp"
#include "deminify/bundle.hpp"
#include "deminify/container.hpp"
#include "deminify/context.hpp"
#include "deminify/digest.hpp"
#include "deminify/error.hpp"
#include "deminify/evaluation.hpp"
#include "deminify/mangle.hpp"
#include "deminify/nn.hpp"
#include "deminify/pipeline.hpp"
#include "deminify/predictor.hpp"
#include "deminify/recovery.hpp"
#include "deminify/scope.hpp"
#include "deminify/token.hpp"
#include "deminify/vocabulary.hpp"
