#pragma once

#include <map>
#include <string>
#include <vector>

#include "czsl/diffprims.hpp"

namespace czsl {

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parameter checkpoint, magic "CZPM1": u32 tensor count, then per tensor
// (u32 name length, name bytes, u32 rank, u32 dims..., little-endian f32 payload).
void save_checkpoint(const std::string& path, const std::vector<TensorRef>& tensors);

struct LoadedTensor {
    std::vector<uint32_t> dims;
    std::vector<float> data;
};

std::map<std::string, LoadedTensor> read_checkpoint(const std::string& path);

// Fills the referenced parameter blocks from the file. Tensors present in the
// file but not referenced are ignored; referenced tensors missing from the
// file raise InputError.
void load_checkpoint(const std::string& path, const std::vector<TensorRef>& tensors);

}  // namespace czsl
