/* Copyright 2026 The FPENet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef FPENET_CORE_FILE_IO_H_
#define FPENET_CORE_FILE_IO_H_

#include <string>
#include <string_view>

namespace fpenet {

// Whole-file read; throws Error when the file cannot be opened.
std::string read_file(const std::string& path);

// Writes to a sibling temporary file and renames it over `path`, so
// readers never observe a partial file. Throws Error on failure.
void write_file_atomic(const std::string& path, std::string_view bytes);

}  // namespace fpenet

#endif  // FPENET_CORE_FILE_IO_H_
