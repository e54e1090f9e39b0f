#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace bsmm {

namespace detail {
struct TransferState;
}

/// Handle to one nonblocking transfer. Send handles complete at post time
/// (sends are buffered: the payload is copied into the transport). Receive
/// handles complete when the matching send has been posted and any injected
/// delay has elapsed; their payload is claimed with take_payload after a
/// waitall.
class TransferHandle {
public:
    TransferHandle() = default;

    std::size_t peer() const;
    /// Payload size; 0 on a receive handle whose message has not arrived.
    std::size_t byte_count() const;
    bool is_complete() const;
    bool is_consumed() const;

    /// Moves the received payload out. Requires a completed, consumed
    /// (waited-on) receive handle.
    std::vector<std::byte> take_payload();

private:
    friend class ChannelTransport;
    friend double waitall(std::span<TransferHandle> handles);

    explicit TransferHandle(std::shared_ptr<detail::TransferState> state)
        : state_(std::move(state)) {}

    std::shared_ptr<detail::TransferState> state_;
};

/// Blocks until every handle is complete, marks them consumed, and returns
/// the elapsed blocking time in seconds. Waiting on an already-consumed
/// handle is an error.
double waitall(std::span<TransferHandle> handles);

/// In-process message transport between simulated ranks. Messages are
/// matched on (src, dst, tag); sends are buffered and complete immediately,
/// receives complete when the matching message is available. All operations
/// of one rank must be issued from that rank's coordinator context; distinct
/// ranks may call concurrently.
class ChannelTransport {
public:
    explicit ChannelTransport(std::size_t ranks);
    virtual ~ChannelTransport() = default;

    std::size_t ranks() const noexcept { return n_ranks_; }

    TransferHandle send(std::size_t src, std::size_t dst, int tag,
                        std::vector<std::byte> payload);
    TransferHandle recv(std::size_t src, std::size_t dst, int tag);

protected:
    /// Time after posting at which a message becomes visible to its
    /// receiver; the fault-injection transport overrides this.
    virtual std::chrono::nanoseconds message_delay(std::size_t /*src*/, std::size_t /*dst*/,
                                                   int /*tag*/) const {
        return std::chrono::nanoseconds::zero();
    }

private:
    struct Message {
        std::vector<std::byte> payload;
        std::chrono::steady_clock::time_point available_at;
    };
    using Key = std::tuple<std::size_t, std::size_t, int>;  // src, dst, tag

    std::size_t n_ranks_;
    std::mutex mu_;
    std::map<Key, std::vector<Message>> mailbox_;
    std::map<Key, std::vector<std::shared_ptr<detail::TransferState>>> pending_;
};

/// Test transport that holds every message back by a fixed delay.
class DelayTransport : public ChannelTransport {
public:
    DelayTransport(std::size_t ranks, std::chrono::nanoseconds delay)
        : ChannelTransport(ranks), delay_(delay) {}

protected:
    std::chrono::nanoseconds message_delay(std::size_t, std::size_t, int) const override {
        return delay_;
    }

private:
    std::chrono::nanoseconds delay_;
};

}  // namespace bsmm
