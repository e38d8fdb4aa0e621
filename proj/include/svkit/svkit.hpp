// Copyright 2026  The svkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "svkit/error.hpp"
#include "svkit/parallel.hpp"
#include "svkit/embedding.hpp"
#include "svkit/embedding_io.hpp"
#include "svkit/synth.hpp"
#include "svkit/trials.hpp"
#include "svkit/scoring.hpp"
#include "svkit/qmf.hpp"
#include "svkit/calibration.hpp"
#include "svkit/metrics.hpp"
#include "svkit/kmeans.hpp"
#include "svkit/ahc.hpp"
#include "svkit/pseudo_label.hpp"
#include "svkit/aam.hpp"
#include "svkit/moco.hpp"
#include "svkit/schedule.hpp"
#include "svkit/gradcheck.hpp"
