// Copyright 2026 mosprob Authors
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

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mosprob
{

/// Malformed or inconsistent model input (parse, validation, lowering).
class ModelError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Value iteration hit its iteration cap before reaching the tolerance.
class NonConvergence : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Scheduler enumeration refused because the scheduler count exceeds the cap.
class CapExceeded : public std::runtime_error
{
public:
  CapExceeded(const std::string & what, std::string count)
  : std::runtime_error(what), count_(std::move(count))
  {
  }

  [[nodiscard]] const std::string & count() const { return count_; }

private:
  std::string count_;
};

}  // namespace mosprob
