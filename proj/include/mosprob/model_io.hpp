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

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mosprob/errors.hpp"
#include "mosprob/mos.hpp"
#include "mosprob/pa.hpp"
#include "mosprob/pmc.hpp"

namespace mosprob
{

/// Text model format, version 1. Grammar in docs/model-format.md.
inline constexpr int kModelFormatVersion = 1;

struct SourceLoc
{
  std::size_t line = 0;
  std::size_t column = 0;
};

class ParseError : public ModelError
{
public:
  ParseError(SourceLoc loc, const std::string & message);

  [[nodiscard]] SourceLoc where() const { return loc_; }
  [[nodiscard]] const std::string & message() const { return message_; }

private:
  SourceLoc loc_;
  std::string message_;
};

struct DocAction
{
  std::string name;
  ActionOrigin origin = ActionOrigin::kInternal;
  SourceLoc loc;
};

struct DocState
{
  std::string name;
  bool initial = false;
  std::vector<std::string> labels;
  std::vector<double> features;
  SourceLoc loc;
};

struct DocTransition
{
  std::string source;
  std::string action;
  std::vector<std::pair<std::string, double>> dest;
  SourceLoc loc;
};

struct DocOrder
{
  std::string name;
  std::vector<KeyTerm> terms;
  SourceLoc loc;
};

struct ModelDocument
{
  int version = kModelFormatVersion;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> features;
  std::vector<DocAction> actions;
  std::vector<DocState> states;
  std::vector<DocTransition> transitions;
  std::optional<SafetyProperty> property;
  std::vector<DocOrder> orders;
};

/// Parses and checks a document; the first problem is thrown as ParseError.
ModelDocument parse_model(std::string_view text);
/// Normal form: fixed section order, 17 significant digits.
std::string serialize_model(const ModelDocument & doc);

/// JSON mirror of the same schema.
std::string model_to_json(const ModelDocument & doc, int indent = 2);
ModelDocument model_from_json(std::string_view text);

/// Reads a file; ".json" selects the JSON reader.
ModelDocument load_model_file(const std::string & path);
void save_model_file(const ModelDocument & doc, const std::string & path);

struct LoweredModel
{
  Pa pa;
  SafetyProperty property;
  std::vector<PartialOrder> orders;
  std::vector<std::string> warnings;
};

/// States and actions are numbered in declaration order.
LoweredModel lower(const ModelDocument & doc);

/// Export of a PA; only key orders can be written.
ModelDocument to_document(
  const Pa & m, const SafetyProperty & psi, const std::vector<PartialOrder> & orders,
  std::vector<std::pair<std::string, std::string>> meta = {});

}  // namespace mosprob
