/*
 * Pairwise ping-pong: rank r exchanges a payload with rank r^1 and
 * checks both the bytes and the receive status. Needs an even number
 * of ranks.
 */
#include <mpi.h>

#define N 256

int main(void) {
    int rank, size;
    if (MPI_Init(0, 0) != MPI_SUCCESS) return 10;
    MPI_Comm_rank(MPI_COMM_WORLD, &rank);
    MPI_Comm_size(MPI_COMM_WORLD, &size);
    if (size % 2 != 0) return 11;

    int peer = rank ^ 1;
    int out[N], in[N];
    for (int i = 0; i < N; i++) {
        out[i] = rank * 1000 + i;
        in[i] = -1;
    }

    MPI_Status st;
    if (rank < peer) {
        if (MPI_Send(out, N, MPI_INT, peer, 7, MPI_COMM_WORLD)) return 12;
        if (MPI_Recv(in, N, MPI_INT, peer, 7, MPI_COMM_WORLD, &st)) return 13;
    } else {
        if (MPI_Recv(in, N, MPI_INT, peer, 7, MPI_COMM_WORLD, &st)) return 13;
        if (MPI_Send(out, N, MPI_INT, peer, 7, MPI_COMM_WORLD)) return 12;
    }

    if (st.MPI_SOURCE != peer || st.MPI_TAG != 7) return 14;
    int count;
    if (MPI_Get_count(&st, MPI_INT, &count) || count != N) return 15;
    for (int i = 0; i < N; i++)
        if (in[i] != peer * 1000 + i) return 16;

    return MPI_Finalize() ? 17 : 0;
}
