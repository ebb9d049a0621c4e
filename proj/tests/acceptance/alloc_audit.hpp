#pragma once

#include <cstddef>

// Process-wide allocation accounting, active when the binary is linked with
// --wrap=malloc,calloc,realloc,free. Tracks live heap bytes and the largest
// single allocation inside a measurement window.
namespace alloc_audit {

// Starts a window at the current live-byte level.
void reset_window();

// Peak live bytes above the level at reset, within the current window.
std::size_t window_peak_growth();

// Largest single allocation observed in the current window.
std::size_t window_max_single();

// True once any wrapped allocation call has been observed; a false value
// means the audit is not actually linked in and its numbers are void.
bool engaged();

}  // namespace alloc_audit
