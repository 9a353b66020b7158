#ifndef LEDSIM_PACKET_H_
#define LEDSIM_PACKET_H_

#include <cstdint>

#include "ledsim/sim_time.h"

namespace ledsim {

using FlowId = int;

// A data segment or an acknowledgement. Data packets carry the sender's
// timestamp; acks carry the receiver-computed one-way delay and echo enough
// of the triggering data packet for the sender to match it.
struct Packet {
  FlowId flow_id = 0;
  std::uint64_t seq = 0;  // data packets, starts at 1
  std::uint32_t size_bytes = 0;
  std::int64_t sent_at_sender_clock = 0;  // sender clock, may carry an offset
  bool is_ack = false;
  bool is_retransmission = false;

  // Transmission counter of the data packet. Unique per transmission, so a
  // retransmitted segment gets a fresh value.
  std::uint64_t tx_index = 0;

  // Ack fields.
  std::uint64_t ack_of_seq = 0;          // cumulative: highest in-order seq
  std::int64_t measured_delay_us = 0;    // receiver clock minus sender stamp
  std::uint64_t echo_seq = 0;            // seq of the data packet acked
  std::uint64_t echo_tx_index = 0;       // its transmission counter
  std::int64_t echo_timestamp = 0;       // its sender timestamp

  // Set by the bottleneck when the packet is accepted into the queue.
  SimTime enqueued_at;
};

}  // namespace ledsim

#endif  // LEDSIM_PACKET_H_
