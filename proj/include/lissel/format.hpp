// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The lissel Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LISSEL_FORMAT_HPP
#define LISSEL_FORMAT_HPP

#include <cmath>
#include <cstdio>
#include <string>

namespace lissel {

/// Shortest-safe round-trip text for a double: 17 significant digits, '.' separator.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace lissel

#endif  // LISSEL_FORMAT_HPP
