#pragma once

#include "qpkam/cocycle.hpp"

namespace qpkam {

json to_json(const TorusMatrix& f);
TorusMatrix torus_from_json(const json& j);

json to_json(const Mat& A);
Mat mat_from_json(const json& j);

json to_json(const Frequency& w);

}  // namespace qpkam
