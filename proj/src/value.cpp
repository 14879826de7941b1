// Copyright 2026 The Twinworld Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "twinworld/value.hpp"

#include <bit>
#include <cmath>
#include <sstream>

#include "twinworld/error.hpp"

namespace twinworld {

namespace {

const char* alternative_name(const Value::Storage& v) {
  switch (v.index()) {
    case 0: return "Bool";
    case 1: return "Integer";
    default: return "Real";
  }
}

[[noreturn]] void throw_mismatch(const Value::Storage& v, const char* wanted) {
  throw Error(ErrorCode::type_mismatch, std::string("expected ") + wanted +
                                            " value, got " +
                                            alternative_name(v));
}

}  // namespace

bool Value::as_bool() const {
  if (const auto* b = std::get_if<bool>(&v_)) return *b;
  throw_mismatch(v_, "Bool");
}

std::int64_t Value::as_integer() const {
  if (const auto* i = std::get_if<std::int64_t>(&v_)) return *i;
  throw_mismatch(v_, "Integer");
}

double Value::as_real() const {
  if (const auto* d = std::get_if<double>(&v_)) return *d;
  throw_mismatch(v_, "Real");
}

double Value::to_double() const noexcept {
  switch (v_.index()) {
    case 0: return std::get<bool>(v_) ? 1.0 : 0.0;
    case 1: return static_cast<double>(std::get<std::int64_t>(v_));
    default: return std::get<double>(v_);
  }
}

bool operator==(const Value& a, const Value& b) noexcept {
  if (a.v_.index() != b.v_.index()) return false;
  switch (a.v_.index()) {
    case 0: return std::get<bool>(a.v_) == std::get<bool>(b.v_);
    case 1: return std::get<std::int64_t>(a.v_) == std::get<std::int64_t>(b.v_);
    default:
      return std::bit_cast<std::uint64_t>(std::get<double>(a.v_)) ==
             std::bit_cast<std::uint64_t>(std::get<double>(b.v_));
  }
}

bool values_match(const Value& a, const Value& b, double tolerance) noexcept {
  if (tolerance > 0.0 && a.is_real() && b.is_real()) {
    return std::abs(std::get<double>(a.storage()) -
                    std::get<double>(b.storage())) <= tolerance;
  }
  return a == b;
}

std::string Value::to_string() const {
  std::ostringstream os;
  os << *this;
  return os.str();
}

std::ostream& operator<<(std::ostream& os, const Value& v) {
  switch (v.storage().index()) {
    case 0: return os << (std::get<bool>(v.storage()) ? "true" : "false");
    case 1: return os << std::get<std::int64_t>(v.storage());
    default: {
      auto old = os.precision(17);
      os << std::get<double>(v.storage());
      os.precision(old);
      return os;
    }
  }
}

}  // namespace twinworld
