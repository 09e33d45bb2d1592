#pragma once

// Kernels come in two flavours: an OpenMP implementation used by default
// and a plain serial reference kept for testing and benchmarking. Both must
// produce identical results.
namespace sfa {

enum class Exec { kParallel, kSerial };

// Threads OpenMP will use for a parallel region (1 without OpenMP).
int max_threads();

// Sets the default OpenMP thread count; values < 1 are ignored.
void set_threads(int n);

}  // namespace sfa
