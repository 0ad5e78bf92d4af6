#pragma once

#include "layercut/math.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace layercut {

/// Static 3-d kd-tree over a point set. Nearest-neighbor results are
/// value-deterministic: among equidistant points the lowest index wins,
/// independent of tree layout.
class KdTree {
public:
    KdTree() = default;

    explicit KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
        if (points_.empty()) return;
        order_.resize(points_.size());
        std::iota(order_.begin(), order_.end(), 0);
        nodes_.reserve(points_.size() * 2);
        root_ = build(0, static_cast<int>(points_.size()));
    }

    bool empty() const { return points_.empty(); }
    size_t size() const { return points_.size(); }
    const Vec3& point(int i) const { return points_[i]; }

    /// Index of the nearest point to q (ties: lowest index).
    int nearest(const Vec3& q) const {
        require(!points_.empty(), "KdTree: nearest on empty tree");
        int best = -1;
        double best_d2 = std::numeric_limits<double>::max();
        search(root_, q, best, best_d2);
        return best;
    }

    double nearest_distance(const Vec3& q) const {
        return (points_[nearest(q)] - q).norm();
    }

private:
    struct Node {
        int axis = -1;        // -1 marks a leaf
        double split = 0.0;
        int left = -1, right = -1;
        int begin = 0, end = 0;  // leaf range into order_
    };

    static constexpr int kLeafSize = 8;

    int build(int begin, int end) {
        Node node;
        if (end - begin <= kLeafSize) {
            node.begin = begin;
            node.end = end;
            // Keep leaves index-sorted so equal-distance scans hit low indices first.
            std::sort(order_.begin() + begin, order_.begin() + end);
            nodes_.push_back(node);
            return static_cast<int>(nodes_.size()) - 1;
        }
        Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
        Vec3 hi = Vec3::Constant(std::numeric_limits<double>::lowest());
        for (int i = begin; i < end; ++i) {
            lo = lo.cwiseMin(points_[order_[i]]);
            hi = hi.cwiseMax(points_[order_[i]]);
        }
        int axis = 0;
        (hi - lo).maxCoeff(&axis);
        const int mid = (begin + end) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });
        node.axis = axis;
        node.split = points_[order_[mid]][axis];
        const int self = static_cast<int>(nodes_.size());
        nodes_.push_back(node);
        const int l = build(begin, mid);
        const int r = build(mid, end);
        nodes_[self].left = l;
        nodes_[self].right = r;
        return self;
    }

    void search(int ni, const Vec3& q, int& best, double& best_d2) const {
        const Node& n = nodes_[ni];
        if (n.axis < 0) {
            for (int i = n.begin; i < n.end; ++i) {
                const int idx = order_[i];
                const double d2 = (points_[idx] - q).squaredNorm();
                if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
                    best_d2 = d2;
                    best = idx;
                }
            }
            return;
        }
        const double delta = q[n.axis] - n.split;
        const int near = delta < 0.0 ? n.left : n.right;
        const int far = delta < 0.0 ? n.right : n.left;
        search(near, q, best, best_d2);
        // <= so an equidistant lower index on the far side is still found.
        if (delta * delta <= best_d2) search(far, q, best, best_d2);
    }

    std::vector<Vec3> points_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace layercut
