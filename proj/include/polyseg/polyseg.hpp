// Copyright 2026 The polyseg Authors.
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

#include "polyseg/batch.hpp"
#include "polyseg/checkpoint.hpp"
#include "polyseg/corpus.hpp"
#include "polyseg/crf.hpp"
#include "polyseg/embed.hpp"
#include "polyseg/error.hpp"
#include "polyseg/eval.hpp"
#include "polyseg/grad_check.hpp"
#include "polyseg/network.hpp"
#include "polyseg/random.hpp"
#include "polyseg/tensor.hpp"
#include "polyseg/train.hpp"
#include "polyseg/transducer.hpp"
#include "polyseg/utf8.hpp"
