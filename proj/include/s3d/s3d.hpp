// Copyright 2026 The S3D Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "s3d/dataset.hpp"
#include "s3d/error.hpp"
#include "s3d/evaluator.hpp"
#include "s3d/export.hpp"
#include "s3d/io.hpp"
#include "s3d/metrics.hpp"
#include "s3d/partition.hpp"
#include "s3d/partitioner.hpp"
#include "s3d/predictor.hpp"
#include "s3d/selector.hpp"
#include "s3d/synthetic.hpp"
