#pragma once

#include <functional>

namespace nlpde {

/// Process-wide worker count for slice-parallel loops (CLI --threads).
/// 1 (the default) is the bit-deterministic serial mode.
int thread_count();
void set_thread_count(int n);

/// Runs fn(i) for i in [begin, end). Serial when thread_count() == 1; the
/// iterations must be independent (no cross-index writes).
void parallel_for(int begin, int end, const std::function<void(int)>& fn);

} // namespace nlpde
