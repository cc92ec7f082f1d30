#ifndef GSAGCN_CHECKPOINT_HPP
#define GSAGCN_CHECKPOINT_HPP

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "gsagcn/gnn.hpp"

namespace gsagcn {

// Layout (all integers and floats little-endian):
//   "GSAGCNPB"  u32 version (=1)  u32 layer count
//   per layer:  u64 d_in  u64 d_out  u64 d_att (0 = plain layer)
//   per layer:  f64 values of w, wl, wr, wh, wg (row-major), then gamma
void write_checkpoint(std::ostream& out, const std::vector<GsaLayerParams>& params);
std::vector<GsaLayerParams> read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const std::vector<GsaLayerParams>& params);
std::vector<GsaLayerParams> load_checkpoint(const std::filesystem::path& path);

}  // namespace gsagcn

#endif  // GSAGCN_CHECKPOINT_HPP
