//
// Copyright 2026 The dpsynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#pragma once

#include "dpsynth/accountant.h"
#include "dpsynth/adult.h"
#include "dpsynth/audit.h"
#include "dpsynth/csv.h"
#include "dpsynth/dataset.h"
#include "dpsynth/error.h"
#include "dpsynth/laplace.h"
#include "dpsynth/marginal.h"
#include "dpsynth/privatize.h"
#include "dpsynth/random.h"
#include "dpsynth/schema.h"
#include "dpsynth/synth.h"
