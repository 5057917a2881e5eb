// Copyright 2026 The lidp Authors
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

#ifndef LIDP_PARALLEL_HPP_
#define LIDP_PARALLEL_HPP_

#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lidp {

// Runs fn(i) for i in [0, count).
//
// workers == 1 is the serial reference path: a plain loop on the calling
// thread.  workers == 0 uses the OpenMP default thread count; any other
// positive value requests exactly that many threads.  Callers must make
// fn(i) write only to slot i of preallocated output, so results are
// independent of scheduling and bit-identical to the serial path.
//
// The first exception thrown by any fn(i) is captured and rethrown on the
// calling thread after the loop completes.
inline void parallel_for(std::size_t count, int workers,
                         const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
#ifdef _OPENMP
  if (workers != 1 && count > 1) {
    const int threads = workers <= 0 ? omp_get_max_threads() : workers;
    std::exception_ptr first_error;
    std::mutex error_mutex;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (long long i = 0; i < static_cast<long long>(count); ++i) {
      try {
        fn(static_cast<std::size_t>(i));
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
    if (first_error) std::rethrow_exception(first_error);
    return;
  }
#else
  (void)workers;
#endif
  for (std::size_t i = 0; i < count; ++i) fn(i);
}

}  // namespace lidp

#endif  // LIDP_PARALLEL_HPP_
