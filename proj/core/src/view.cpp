#include "pedsplat/view.hpp"

namespace pedsplat {

std::string view_id(const std::string& frame, const std::string& camera) { return frame + "/" + camera; }

} // namespace pedsplat
