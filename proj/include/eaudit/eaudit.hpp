// Copyright 2026 The eaudit Authors
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

#include "eaudit/error.hpp"
#include "eaudit/opcore.hpp"
#include "eaudit/states.hpp"
#include "eaudit/state_io.hpp"
#include "eaudit/entropy.hpp"
#include "eaudit/sdp.hpp"
#include "eaudit/separability.hpp"
#include "eaudit/measures.hpp"
#include "eaudit/hypotest.hpp"
#include "eaudit/reversibility.hpp"
#include "eaudit/report.hpp"
