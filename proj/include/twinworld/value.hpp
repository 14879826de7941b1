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

#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace twinworld {

/// Identifier of one random choice inside an execution trace.
class Address {
 public:
  Address() = default;
  explicit Address(std::string key) : key_(std::move(key)) {}
  explicit Address(std::string_view key) : key_(key) {}
  explicit Address(const char* key) : key_(key) {}

  const std::string& key() const noexcept { return key_; }

  friend auto operator<=>(const Address&, const Address&) = default;
  friend bool operator==(const Address&, const Address&) = default;

  friend std::ostream& operator<<(std::ostream& os, const Address& a) {
    return os << a.key_;
  }

 private:
  std::string key_;
};

/// Realized value of a random procedure: Bool, Integer or Real.
class Value {
 public:
  using Storage = std::variant<bool, std::int64_t, double>;

  Value() : v_(false) {}
  Value(bool b) : v_(b) {}  // NOLINT(google-explicit-constructor)
  Value(int i) : v_(static_cast<std::int64_t>(i)) {}  // NOLINT
  Value(std::int64_t i) : v_(i) {}                      // NOLINT
  Value(double d) : v_(d) {}                            // NOLINT

  bool is_bool() const noexcept { return std::holds_alternative<bool>(v_); }
  bool is_integer() const noexcept {
    return std::holds_alternative<std::int64_t>(v_);
  }
  bool is_real() const noexcept { return std::holds_alternative<double>(v_); }

  // Strict accessors; throw Error(type_mismatch) on the wrong alternative.
  bool as_bool() const;
  std::int64_t as_integer() const;
  double as_real() const;

  /// Numeric view used by estimators: false/true map to 0/1.
  double to_double() const noexcept;

  const Storage& storage() const noexcept { return v_; }

  /// Exact equality. Reals compare bitwise, so NaN == NaN and 0.0 != -0.0.
  friend bool operator==(const Value& a, const Value& b) noexcept;

  std::string to_string() const;

 private:
  Storage v_;
};

/// Equality used for Delta observations. With `tolerance` > 0, two Reals
/// match when |a - b| <= tolerance; all other cases defer to exact equality.
bool values_match(const Value& a, const Value& b, double tolerance) noexcept;

std::ostream& operator<<(std::ostream& os, const Value& v);

}  // namespace twinworld

template <>
struct std::hash<twinworld::Address> {
  std::size_t operator()(const twinworld::Address& a) const noexcept {
    return std::hash<std::string>{}(a.key());
  }
};
