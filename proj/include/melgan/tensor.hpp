/* Copyright 2026 The MelGAN-CPP Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace melgan {

class Graph;

namespace detail {
// Leaves new elements uninitialized on resize, so buffers that are fully
// overwritten right away skip a zero-fill pass.
template <typename T>
struct DefaultInitAllocator : std::allocator<T> {
  template <typename U>
  struct rebind {
    using other = DefaultInitAllocator<U>;
  };
  using std::allocator<T>::allocator;
  template <typename U>
  void construct(U* p) noexcept {
    ::new (static_cast<void*>(p)) U;
  }
  template <typename U, typename... Args>
  void construct(U* p, Args&&... args) {
    ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
  }
};
}  // namespace detail

using FloatBuffer = std::vector<float, detail::DefaultInitAllocator<float>>;

/// Extent of a rank-3 (batch, channels, time) array.
struct Shape {
  std::int64_t batch = 1;
  std::int64_t channels = 1;
  std::int64_t time = 0;

  std::int64_t numel() const noexcept { return batch * channels * time; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Row-major float32 array over (batch, channels, time) with an optional
/// gradient buffer. Copies are shallow: two Tensor values may name the
/// same storage, the same way parameters are shared between a model and
/// its optimizer.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  // Contents are unspecified; for outputs that are written in full.
  static Tensor empty(Shape shape);
  static Tensor full(Shape shape, float value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<float> values,
                     bool requires_grad = false);
  static Tensor scalar(float value, bool requires_grad = false);

  bool defined() const noexcept { return impl_ != nullptr; }
  const Shape& shape() const;
  std::int64_t numel() const { return shape().numel(); }
  bool is_scalar() const { return defined() && numel() == 1; }

  std::span<float> data();
  std::span<const float> data() const;
  float item() const;

  // Element (b, c, t).
  float at(std::int64_t b, std::int64_t c, std::int64_t t) const;
  float& at(std::int64_t b, std::int64_t c, std::int64_t t);

  bool requires_grad() const;
  void set_requires_grad(bool on);

  bool has_grad() const;
  std::span<float> grad();
  std::span<const float> grad() const;
  // Allocates a zero gradient buffer when absent.
  std::span<float> ensure_grad();
  void zero_grad();
  void clear_grad();

  /// A tensor sharing this one's storage but carrying no gradient
  /// requirement and no producer, so no gradient flows through it.
  Tensor detach() const;
  Tensor clone() const;

  bool same_storage(const Tensor& other) const;

 private:
  friend class Graph;

  struct Impl {
    Shape shape;
    std::shared_ptr<FloatBuffer> data;
    std::vector<float> grad;
    bool has_grad = false;
    bool requires_grad = false;
    // Producer bookkeeping, set by Graph::record.
    const Graph* graph = nullptr;
    std::size_t node = 0;
  };

  explicit Tensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
  Impl& impl() const;

  std::shared_ptr<Impl> impl_;
};

void check_shape(Shape shape);

}  // namespace melgan
