// Copyright 2026 The S3D Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace s3d {

/// Raised for invalid data, invalid model state, or failed I/O.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for invalid caller-supplied arguments (bad k, bad flags). The CLI
/// maps it to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Raised by fit when the target has no variance to explain.
class NoVarianceError : public Error {
 public:
  using Error::Error;
};

}  // namespace s3d
