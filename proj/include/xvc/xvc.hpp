// Copyright 2026 The xviewcorr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "xvc/errors.hpp"
#include "xvc/mask.hpp"
#include "xvc/metrics.hpp"
#include "xvc/annotation_io.hpp"
#include "xvc/random.hpp"
#include "xvc/image.hpp"
#include "xvc/dataset.hpp"
#include "xvc/text_provider.hpp"
#include "xvc/tensor.hpp"
#include "xvc/condition_encoder.hpp"
#include "xvc/condition_fusion.hpp"
#include "xvc/cross_view_alignment.hpp"
#include "xvc/segmenter.hpp"
#include "xvc/model.hpp"
#include "xvc/optimizer.hpp"
#include "xvc/evaluation.hpp"
#include "xvc/training.hpp"
#include "xvc/checkpoint.hpp"
#include "xvc/dataset_io.hpp"
