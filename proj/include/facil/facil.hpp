// Copyright 2026 The facil Authors.
// SPDX-License-Identifier: Apache-2.0

// Umbrella header.

#pragma once

#include "facil/analysis.hpp"
#include "facil/config.hpp"
#include "facil/curation.hpp"
#include "facil/dataset.hpp"
#include "facil/factor_space.hpp"
#include "facil/flywheel.hpp"
#include "facil/oracle.hpp"
#include "facil/orbit.hpp"
