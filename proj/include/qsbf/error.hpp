// SPDX-License-Identifier: Apache-2.0
//
// qsbf: quadratic-surface SVM digital beamformer simulation library
// Copyright (C) 2026 The qsbf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <stdexcept>
#include <string>

namespace qsbf
{
    // Bad configuration or caller input. The CLI maps this to exit code 2.
    class ConfigError : public std::invalid_argument
    {
    public:
        explicit ConfigError(const std::string &msg) : std::invalid_argument(msg) {}
    };

    // A solve or factorization could not be completed. The CLI maps this to exit code 3.
    class NumericalError : public std::runtime_error
    {
    public:
        explicit NumericalError(const std::string &msg) : std::runtime_error(msg) {}
    };

    inline void require(bool cond, const std::string &msg)
    {
        if (!cond)
            throw ConfigError(msg);
    }
}
