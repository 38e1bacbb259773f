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

#include "melgan/tensor.hpp"

#include <algorithm>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "melgan/errors.hpp"

namespace melgan {

namespace {
#if defined(__GLIBC__)
// Activation buffers are large and short-lived. Serving them from the heap
// instead of fresh mmap regions avoids a page fault per 4 KiB on every step.
const bool g_allocator_tuned = [] {
  mallopt(M_MMAP_THRESHOLD, 32 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  return true;
}();
#endif
}  // namespace

std::string Shape::str() const {
  return "[" + std::to_string(batch) + ", " + std::to_string(channels) + ", " +
         std::to_string(time) + "]";
}

void check_shape(Shape shape) {
  if (shape.batch < 1) throw ShapeError("batch", "must be >= 1, got " + shape.str());
  if (shape.channels < 1)
    throw ShapeError("channels", "must be >= 1, got " + shape.str());
  if (shape.time < 0) throw ShapeError("time", "must be >= 0, got " + shape.str());
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(shape, 0.0f, requires_grad);
}

Tensor Tensor::empty(Shape shape) {
  check_shape(shape);
  auto impl = std::make_shared<Impl>();
  impl->shape = shape;
  impl->data = std::make_shared<FloatBuffer>(static_cast<std::size_t>(shape.numel()));
  return Tensor(std::move(impl));
}

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
  check_shape(shape);
  auto impl = std::make_shared<Impl>();
  impl->shape = shape;
  impl->data = std::make_shared<FloatBuffer>(static_cast<std::size_t>(shape.numel()), value);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::from(Shape shape, std::vector<float> values, bool requires_grad) {
  check_shape(shape);
  if (static_cast<std::int64_t>(values.size()) != shape.numel()) {
    throw ShapeError("time", "buffer of " + std::to_string(values.size()) +
                                 " floats does not fill " + shape.str());
  }
  auto impl = std::make_shared<Impl>();
  impl->shape = shape;
  impl->data = std::make_shared<FloatBuffer>(values.begin(), values.end());
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(float value, bool requires_grad) {
  return full({1, 1, 1}, value, requires_grad);
}

Tensor::Impl& Tensor::impl() const {
  if (!impl_) throw Error("use of undefined tensor");
  return *impl_;
}

const Shape& Tensor::shape() const { return impl().shape; }

std::span<float> Tensor::data() { return *impl().data; }
std::span<const float> Tensor::data() const { return *impl().data; }

float Tensor::item() const {
  if (numel() != 1) throw ShapeError("time", "item() on non-scalar " + shape().str());
  return (*impl().data)[0];
}

float Tensor::at(std::int64_t b, std::int64_t c, std::int64_t t) const {
  const Shape& s = shape();
  return (*impl().data)[static_cast<std::size_t>((b * s.channels + c) * s.time + t)];
}

float& Tensor::at(std::int64_t b, std::int64_t c, std::int64_t t) {
  const Shape& s = shape();
  return (*impl().data)[static_cast<std::size_t>((b * s.channels + c) * s.time + t)];
}

bool Tensor::requires_grad() const { return impl().requires_grad; }
void Tensor::set_requires_grad(bool on) { impl().requires_grad = on; }

bool Tensor::has_grad() const { return impl().has_grad; }

std::span<float> Tensor::grad() {
  if (!has_grad()) throw Error("tensor has no gradient buffer");
  return impl().grad;
}

std::span<const float> Tensor::grad() const {
  if (!has_grad()) throw Error("tensor has no gradient buffer");
  return impl().grad;
}

std::span<float> Tensor::ensure_grad() {
  Impl& i = impl();
  if (!i.has_grad) {
    i.grad.assign(i.data->size(), 0.0f);
    i.has_grad = true;
  }
  return i.grad;
}

void Tensor::zero_grad() {
  Impl& i = impl();
  if (i.has_grad) std::fill(i.grad.begin(), i.grad.end(), 0.0f);
}

void Tensor::clear_grad() {
  Impl& i = impl();
  i.grad.clear();
  i.grad.shrink_to_fit();
  i.has_grad = false;
}

Tensor Tensor::detach() const {
  auto impl = std::make_shared<Impl>();
  impl->shape = shape();
  impl->data = impl_->data;
  return Tensor(std::move(impl));
}

Tensor Tensor::clone() const {
  const auto& d = *impl().data;
  return from(shape(), std::vector<float>(d.begin(), d.end()), false);
}

bool Tensor::same_storage(const Tensor& other) const {
  return defined() && other.defined() && impl_->data == other.impl_->data;
}

}  // namespace melgan
