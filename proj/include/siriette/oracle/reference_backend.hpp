#pragma once

#include <memory>

#include "siriette/kernels/backend.hpp"

namespace siriette::oracle {

// Kernel backend built from the oracle's scalar code; registered as "reference".
std::shared_ptr<const kernels::KernelBackend> reference_backend();
void register_reference_backend();

}  // namespace siriette::oracle
