// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
#pragma once

#include <condition_variable>
#include <deque>
#include <mutex>
#include <optional>

namespace cacheshield::internal {

// Unbounded multi-producer FIFO. Pop blocks until an item arrives or the
// channel is closed and drained.
template <typename T>
class Channel {
 public:
  void Push(T value) {
    {
      std::lock_guard lock(mu_);
      items_.push_back(std::move(value));
    }
    cv_.notify_one();
  }

  std::optional<T> Pop() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return !items_.empty() || closed_; });
    if (items_.empty()) return std::nullopt;
    T value = std::move(items_.front());
    items_.pop_front();
    return value;
  }

  void Close() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<T> items_;
  bool closed_ = false;
};

}  // namespace cacheshield::internal
