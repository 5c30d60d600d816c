#pragma once

#include <cstddef>
#include <functional>

namespace cpfind {

//! Thread budget for embarrassingly parallel replication loops, capped by
//! the CPFIND_THREADS environment variable.
int thread_budget();

//! Runs fn(i) for i in [0, n), chunked across the thread budget. Each index
//! must write only its own output slot; results are then deterministic
//! regardless of the budget.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace cpfind
