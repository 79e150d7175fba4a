/*
 * Copyright 2026 The autots Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#pragma once

// Umbrella header.

#include "autots/backend.hpp"
#include "autots/elite_set.hpp"
#include "autots/embedding_table.hpp"
#include "autots/errors.hpp"
#include "autots/evaluator.hpp"
#include "autots/external_backend.hpp"
#include "autots/history.hpp"
#include "autots/horizontal.hpp"
#include "autots/importance.hpp"
#include "autots/knowledge_graph.hpp"
#include "autots/orchestrator.hpp"
#include "autots/rng.hpp"
#include "autots/run_config.hpp"
#include "autots/search_space.hpp"
#include "autots/search_state.hpp"
#include "autots/surrogates.hpp"
#include "autots/transr.hpp"
#include "autots/vertical.hpp"
