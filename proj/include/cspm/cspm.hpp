/* Copyright 2026 The CSPM Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

// Umbrella header.
#include "cspm/adam.hpp"
#include "cspm/channel.hpp"
#include "cspm/checkpoint.hpp"
#include "cspm/container.hpp"
#include "cspm/dataset.hpp"
#include "cspm/errors.hpp"
#include "cspm/frontend.hpp"
#include "cspm/layers.hpp"
#include "cspm/loss.hpp"
#include "cspm/metrics.hpp"
#include "cspm/model.hpp"
#include "cspm/modulation.hpp"
#include "cspm/phase_motion.hpp"
#include "cspm/rng.hpp"
#include "cspm/signal.hpp"
#include "cspm/tensor.hpp"
#include "cspm/train.hpp"
