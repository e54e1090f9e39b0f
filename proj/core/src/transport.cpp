#include "bsmm/transport.hpp"

#include <string>
#include <thread>

#include "bsmm/errors.hpp"

namespace bsmm {

namespace detail {

struct TransferState {
    std::mutex mu;
    std::condition_variable cv;
    bool is_send = false;
    bool payload_bound = false;  // recv: matching send has been posted
    bool consumed = false;
    bool payload_taken = false;
    std::size_t peer = 0;
    std::size_t bytes = 0;
    std::vector<std::byte> payload;
    std::chrono::steady_clock::time_point available_at;
};

}  // namespace detail

using detail::TransferState;

std::size_t TransferHandle::peer() const {
    if (!state_) throw UsageError("empty transfer handle");
    return state_->peer;
}

std::size_t TransferHandle::byte_count() const {
    if (!state_) throw UsageError("empty transfer handle");
    std::lock_guard lk(state_->mu);
    return state_->bytes;
}

bool TransferHandle::is_complete() const {
    if (!state_) throw UsageError("empty transfer handle");
    std::lock_guard lk(state_->mu);
    if (state_->is_send) return true;
    return state_->payload_bound &&
           std::chrono::steady_clock::now() >= state_->available_at;
}

bool TransferHandle::is_consumed() const {
    if (!state_) throw UsageError("empty transfer handle");
    std::lock_guard lk(state_->mu);
    return state_->consumed;
}

std::vector<std::byte> TransferHandle::take_payload() {
    if (!state_) throw UsageError("empty transfer handle");
    std::lock_guard lk(state_->mu);
    if (state_->is_send) throw UsageError("send handles carry no payload");
    if (!state_->consumed) throw UsageError("take_payload before waitall");
    if (state_->payload_taken) throw UsageError("payload taken twice");
    state_->payload_taken = true;
    return std::move(state_->payload);
}

double waitall(std::span<TransferHandle> handles) {
    const auto t0 = std::chrono::steady_clock::now();
    for (TransferHandle& h : handles) {
        if (!h.state_) throw UsageError("empty transfer handle");
        std::unique_lock lk(h.state_->mu);
        if (h.state_->consumed) {
            throw UsageError("waitall on an already-consumed transfer handle");
        }
        if (!h.state_->is_send) {
            h.state_->cv.wait(lk, [&] { return h.state_->payload_bound; });
            const auto available_at = h.state_->available_at;
            lk.unlock();
            std::this_thread::sleep_until(available_at);
            lk.lock();
        }
        h.state_->consumed = true;
    }
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ChannelTransport::ChannelTransport(std::size_t ranks) : n_ranks_(ranks) {
    if (ranks < 1) {
        throw ParameterError("transport requires at least one rank");
    }
}

TransferHandle ChannelTransport::send(std::size_t src, std::size_t dst, int tag,
                                      std::vector<std::byte> payload) {
    if (src >= n_ranks_ || dst >= n_ranks_) {
        throw ParameterError("transport rank out of range");
    }
    const std::size_t bytes = payload.size();
    const auto available_at = std::chrono::steady_clock::now() + message_delay(src, dst, tag);

    auto handle_state = std::make_shared<TransferState>();
    handle_state->is_send = true;
    handle_state->peer = dst;
    handle_state->bytes = bytes;

    const Key key{src, dst, tag};
    std::shared_ptr<TransferState> matched;
    {
        std::lock_guard lk(mu_);
        auto pending_it = pending_.find(key);
        if (pending_it != pending_.end() && !pending_it->second.empty()) {
            matched = pending_it->second.front();
            pending_it->second.erase(pending_it->second.begin());
        } else {
            mailbox_[key].push_back({std::move(payload), available_at});
        }
    }
    if (matched) {
        std::lock_guard lk(matched->mu);
        matched->payload = std::move(payload);
        matched->bytes = bytes;
        matched->available_at = available_at;
        matched->payload_bound = true;
        matched->cv.notify_all();
    }
    return TransferHandle(std::move(handle_state));
}

TransferHandle ChannelTransport::recv(std::size_t src, std::size_t dst, int tag) {
    if (src >= n_ranks_ || dst >= n_ranks_) {
        throw ParameterError("transport rank out of range");
    }
    auto state = std::make_shared<TransferState>();
    state->is_send = false;
    state->peer = src;

    const Key key{src, dst, tag};
    {
        std::lock_guard lk(mu_);
        auto mail_it = mailbox_.find(key);
        if (mail_it != mailbox_.end() && !mail_it->second.empty()) {
            Message msg = std::move(mail_it->second.front());
            mail_it->second.erase(mail_it->second.begin());
            state->payload = std::move(msg.payload);
            state->bytes = state->payload.size();
            state->available_at = msg.available_at;
            state->payload_bound = true;
            return TransferHandle(std::move(state));
        }
        pending_[key].push_back(state);
    }
    return TransferHandle(std::move(state));
}

}  // namespace bsmm
