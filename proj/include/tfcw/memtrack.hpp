/*
 * Copyright (c) 2026, The tfcw Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>

namespace tfcw::memtrack {

/// True when the allocation hooks are linked into the running binary.
bool enabled() noexcept;

/// Bytes currently held through operator new.
std::size_t current_bytes() noexcept;

/// High-water mark since the last reset_peak().
std::size_t peak_bytes() noexcept;

/// Sets the high-water mark to the current usage.
void reset_peak() noexcept;

// Called by the hooks.
void on_allocate(std::size_t bytes) noexcept;
void on_release(std::size_t bytes) noexcept;
void mark_enabled() noexcept;

}  // namespace tfcw::memtrack
