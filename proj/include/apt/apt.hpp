// Copyright 2026 The APT Toolkit Authors
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

#include "apt/bench.hpp"
#include "apt/blob.hpp"
#include "apt/commands.hpp"
#include "apt/config.hpp"
#include "apt/densemap.hpp"
#include "apt/embedding.hpp"
#include "apt/error.hpp"
#include "apt/gradcheck.hpp"
#include "apt/image.hpp"
#include "apt/imageio.hpp"
#include "apt/overlay.hpp"
#include "apt/packing.hpp"
#include "apt/pipeline.hpp"
#include "apt/quadtree.hpp"
#include "apt/rng.hpp"
#include "apt/scoring.hpp"
#include "apt/selfcheck.hpp"
#include "apt/synthetic.hpp"
#include "apt/tensor.hpp"
#include "apt/toyvit.hpp"
