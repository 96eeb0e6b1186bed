#ifndef LAB_POINTSET_HPP
#define LAB_POINTSET_HPP

// Finite point configurations.  Only the carrier type lives here; the
// generators (iid draws, equal-measure partitions, equispaced circle points)
// are declared in pointset_ops.hpp so that the measure layer can return
// point sets without pulling in partition machinery.

#include <cstdint>
#include <string>
#include <vector>

#include "lab/vec.hpp"

namespace lab {

struct PointSet {
    int dim = 2;
    std::vector<Vec2> pts2; // used when dim == 2
    std::vector<Vec3> pts3; // used when dim == 3
    std::string generator;  // "iid", "partition", "equispaced-circle", "external"
    std::uint64_t seed = 0;

    long long size() const {
        return dim == 3 ? static_cast<long long>(pts3.size())
                        : static_cast<long long>(pts2.size());
    }
};

} // namespace lab

#endif
