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

// Global allocation functions that feed tfcw::memtrack. Sizes come from
// malloc_usable_size so sized and unsized deletes agree.

#include <malloc.h>

#include <cstdlib>
#include <new>

#include "tfcw/memtrack.hpp"

namespace {

struct EnableTracking {
  EnableTracking() noexcept { tfcw::memtrack::mark_enabled(); }
} const g_enable_tracking;

void* tracked_alloc(std::size_t size, std::size_t align) noexcept {
  if (size == 0) size = 1;
  void* p = nullptr;
  if (align <= alignof(std::max_align_t)) {
    p = std::malloc(size);
  } else if (posix_memalign(&p, align, size) != 0) {
    p = nullptr;
  }
  if (p) tfcw::memtrack::on_allocate(malloc_usable_size(p));
  return p;
}

void tracked_free(void* p) noexcept {
  if (!p) return;
  tfcw::memtrack::on_release(malloc_usable_size(p));
  std::free(p);
}

void* alloc_or_throw(std::size_t size, std::size_t align) {
  void* p = tracked_alloc(size, align);
  if (!p) throw std::bad_alloc();
  return p;
}

}  // namespace

void* operator new(std::size_t size) { return alloc_or_throw(size, alignof(std::max_align_t)); }
void* operator new[](std::size_t size) { return alloc_or_throw(size, alignof(std::max_align_t)); }
void* operator new(std::size_t size, std::align_val_t al) { return alloc_or_throw(size, static_cast<std::size_t>(al)); }
void* operator new[](std::size_t size, std::align_val_t al) {
  return alloc_or_throw(size, static_cast<std::size_t>(al));
}
void* operator new(std::size_t size, const std::nothrow_t&) noexcept {
  return tracked_alloc(size, alignof(std::max_align_t));
}
void* operator new[](std::size_t size, const std::nothrow_t&) noexcept {
  return tracked_alloc(size, alignof(std::max_align_t));
}

void operator delete(void* p) noexcept { tracked_free(p); }
void operator delete[](void* p) noexcept { tracked_free(p); }
void operator delete(void* p, std::size_t) noexcept { tracked_free(p); }
void operator delete[](void* p, std::size_t) noexcept { tracked_free(p); }
void operator delete(void* p, std::align_val_t) noexcept { tracked_free(p); }
void operator delete[](void* p, std::align_val_t) noexcept { tracked_free(p); }
void operator delete(void* p, std::size_t, std::align_val_t) noexcept { tracked_free(p); }
void operator delete[](void* p, std::size_t, std::align_val_t) noexcept { tracked_free(p); }
