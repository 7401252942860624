"""Hot training/evaluation loops, written once for two execution modes.

Every function here sticks to the numpy subset that numba's nopython mode
compiles: C-contiguous float64/int64 arrays, scalar flags instead of strings
or None, no fancy indexing, no dicts. backend.get_kernels() hands out either
these plain functions (numpy backend) or their njit-compiled twins (numba
backend); the source is shared so the two backends cannot drift.

Scalar flag encodings:
    out_act:   0 = softmax, 1 = sigmoid
    loss_kind: 0 = mse, 1 = ce
    opt_kind:  0 = sgd, 1 = rmsprop (with momentum)
    use_bias, record_hidden, stateless: 0/1

reset_eff rows hold 1.0 where a unit's leak is replaced by 0 on that trial.
Formulas mirror models.forward / models.output_delta / optim exactly; the
unit tests pin the two code paths together.
"""
import numpy as np


def dense_train_segment(X, T, order, start, stop, reset_eff,
                        W_ih, b_ih, W_ho, b_ho, H_prev, alphas,
                        out_act, loss_kind, use_bias, opt_kind,
                        lr, beta1, beta2, eps,
                        vW_ih, vb_ih, vW_ho, vb_ho,
                        mW_ih, mb_ih, mW_ho, mb_ho,
                        H_record, record_hidden):
    """Incremental training over schedule positions [start, stop).

    One forward, one leak-unaware backward, one optimizer update per sample.
    Mutates the parameter, optimizer, H_prev and H_record arrays in place.
    Returns the mean per-sample training loss of the segment.
    """
    n_out = W_ho.shape[0]
    loss_sum = 0.0
    for pos in range(start, stop):
        i = order[pos]
        x = X[i]
        t = T[i]

        z_h = np.dot(W_ih, x)
        if use_bias == 1:
            z_h = z_h + b_ih
        inst = np.maximum(z_h, 0.0)
        eff = alphas * (1.0 - reset_eff[pos])
        h = eff * H_prev + (1.0 - eff) * inst
        z_o = np.dot(W_ho, h)
        if use_bias == 1:
            z_o = z_o + b_ho
        if out_act == 0:
            ex = np.exp(z_o - np.max(z_o))
            y = ex / np.sum(ex)
        else:
            zc = np.minimum(np.maximum(z_o, -500.0), 500.0)
            y = 1.0 / (1.0 + np.exp(-zc))

        if loss_kind == 0:
            diff = y - t
            loss_sum += np.mean(diff * diff)
            g = (2.0 / n_out) * diff
            if out_act == 0:
                delta_o = y * (g - np.dot(g, y))
            else:
                delta_o = g * y * (1.0 - y)
        else:
            p = y[np.argmax(t)]
            if p < 1e-12:
                p = 1e-12
            loss_sum += -np.log(p)
            delta_o = y - t

        d_hidden = np.dot(delta_o, W_ho)
        delta_h = d_hidden * (1.0 - eff) * np.where(z_h > 0.0, 1.0, 0.0)
        gW_ih = delta_h.reshape(delta_h.shape[0], 1) * x.reshape(1, x.shape[0])
        gW_ho = delta_o.reshape(n_out, 1) * h.reshape(1, h.shape[0])

        if opt_kind == 0:
            W_ih -= lr * gW_ih
            if use_bias == 1:
                b_ih -= lr * delta_h
            W_ho -= lr * gW_ho
            if use_bias == 1:
                b_ho -= lr * delta_o
        else:
            vW_ih *= beta2
            vW_ih += (1.0 - beta2) * gW_ih * gW_ih
            mW_ih *= beta1
            mW_ih += (1.0 - beta1) * gW_ih / (np.sqrt(vW_ih) + eps)
            W_ih -= lr * mW_ih
            if use_bias == 1:
                vb_ih *= beta2
                vb_ih += (1.0 - beta2) * delta_h * delta_h
                mb_ih *= beta1
                mb_ih += (1.0 - beta1) * delta_h / (np.sqrt(vb_ih) + eps)
                b_ih -= lr * mb_ih
            vW_ho *= beta2
            vW_ho += (1.0 - beta2) * gW_ho * gW_ho
            mW_ho *= beta1
            mW_ho += (1.0 - beta1) * gW_ho / (np.sqrt(vW_ho) + eps)
            W_ho -= lr * mW_ho
            if use_bias == 1:
                vb_ho *= beta2
                vb_ho += (1.0 - beta2) * delta_o * delta_o
                mb_ho *= beta1
                mb_ho += (1.0 - beta1) * delta_o / (np.sqrt(vb_ho) + eps)
                b_ho -= lr * mb_ho

        H_prev[:] = h
        if record_hidden == 1:
            H_record[pos, :] = h
    return loss_sum / (stop - start)


def dense_ordered_eval(X, T, order, reset_eff,
                       W_ih, b_ih, W_ho, b_ho, alphas,
                       out_act, loss_kind, use_bias,
                       sq_err, H_record, record_hidden):
    """Evaluation along an order: hidden state starts at zero and evolves
    under the per-position reset flags. No parameter is written.

    Accumulates per-output-dimension squared error into sq_err and returns
    (mean loss, correct argmax count).
    """
    n = order.shape[0]
    n_out = W_ho.shape[0]
    h_prev = np.zeros(W_ih.shape[0])
    loss_sum = 0.0
    n_correct = 0
    for pos in range(n):
        i = order[pos]
        x = X[i]
        t = T[i]
        z_h = np.dot(W_ih, x)
        if use_bias == 1:
            z_h = z_h + b_ih
        inst = np.maximum(z_h, 0.0)
        eff = alphas * (1.0 - reset_eff[pos])
        h = eff * h_prev + (1.0 - eff) * inst
        z_o = np.dot(W_ho, h)
        if use_bias == 1:
            z_o = z_o + b_ho
        if out_act == 0:
            ex = np.exp(z_o - np.max(z_o))
            y = ex / np.sum(ex)
        else:
            zc = np.minimum(np.maximum(z_o, -500.0), 500.0)
            y = 1.0 / (1.0 + np.exp(-zc))

        diff = y - t
        for j in range(n_out):
            sq_err[j] += diff[j] * diff[j]
        if loss_kind == 0:
            loss_sum += np.mean(diff * diff)
        else:
            p = y[np.argmax(t)]
            if p < 1e-12:
                p = 1e-12
            loss_sum += -np.log(p)
        if np.argmax(y) == np.argmax(t):
            n_correct += 1
        if record_hidden == 1:
            H_record[pos, :] = h
        h_prev = h
    return loss_sum / n, n_correct


def dense_batch_grads(X, T, order, start, count,
                      W_ih, b_ih, W_ho, b_ho,
                      out_act, loss_kind, use_bias,
                      gW_ih_buf, gb_ih_buf, gW_ho_buf, gb_ho_buf):
    """Per-sample feedforward gradients for one mini-batch.

    Column b of each buffer receives the flattened gradient of sample
    order[start + b]. No parameter is touched; the caller reduces the
    buffers and applies the update. Returns the summed sample loss through
    the same ascending canonical reduction as the gradients, so the value
    is bitwise invariant to order within the batch.
    """
    n_out = W_ho.shape[0]
    n_in = W_ih.shape[1]
    losses = np.empty(count)
    for b in range(count):
        i = order[start + b]
        x = X[i]
        t = T[i]
        z_h = np.dot(W_ih, x)
        if use_bias == 1:
            z_h = z_h + b_ih
        h = np.maximum(z_h, 0.0)
        z_o = np.dot(W_ho, h)
        if use_bias == 1:
            z_o = z_o + b_ho
        if out_act == 0:
            ex = np.exp(z_o - np.max(z_o))
            y = ex / np.sum(ex)
        else:
            zc = np.minimum(np.maximum(z_o, -500.0), 500.0)
            y = 1.0 / (1.0 + np.exp(-zc))

        if loss_kind == 0:
            diff = y - t
            losses[b] = np.mean(diff * diff)
            g = (2.0 / n_out) * diff
            if out_act == 0:
                delta_o = y * (g - np.dot(g, y))
            else:
                delta_o = g * y * (1.0 - y)
        else:
            p = y[np.argmax(t)]
            if p < 1e-12:
                p = 1e-12
            losses[b] = -np.log(p)
            delta_o = y - t

        d_hidden = np.dot(delta_o, W_ho)
        delta_h = d_hidden * np.where(z_h > 0.0, 1.0, 0.0)
        gW_ih_buf[:, b] = (delta_h.reshape(delta_h.shape[0], 1)
                           * x.reshape(1, n_in)).ravel()
        gb_ih_buf[:, b] = delta_h
        gW_ho_buf[:, b] = (delta_o.reshape(n_out, 1)
                           * h.reshape(1, h.shape[0])).ravel()
        gb_ho_buf[:, b] = delta_o
    sorted_losses = np.sort(losses)
    loss_sum = 0.0
    for b in range(count):
        loss_sum += sorted_losses[b]
    return loss_sum


def canonical_mean_cols(buf, count, out):
    """Order-invariant mean over the first count columns of buf.

    Per element: sort the addends ascending, sum left to right, divide.
    Matches optim.canonical_mean bit for bit.
    """
    for r in range(buf.shape[0]):
        row = np.sort(buf[r, :count])
        s = row[0]
        for b in range(1, count):
            s = s + row[b]
        out[r] = s / count


def canonical_mean_cols_numpy(buf, count, out):
    """Vectorized twin of canonical_mean_cols (same adds, same order)."""
    s = np.sort(buf[:, :count], axis=1)
    acc = s[:, 0].copy()
    for b in range(1, count):
        acc += s[:, b]
    out[:] = acc / count


def lstm_train_segment(X, T, order, start, stop, window,
                       Wx, Wh, b, W_hy, b_y, h_carry, c_carry,
                       opt_kind, lr, beta1, beta2, eps,
                       vWx, vWh, vb, vW_hy, vb_y,
                       mWx, mWh, mb, mW_hy, mb_y):
    """BPTT training over schedule positions [start, stop).

    Gate rows are stacked [input; forget; candidate; output], each H wide.
    Loss (mse on softmax output) is applied at every step; gradients are
    backpropagated through the whole window, summed over its steps, and
    applied as one update per window. h/c carry across windows detached
    (the incoming state of a window is a constant to its backward pass).
    Returns the mean per-sample loss of the segment.
    """
    H = Wh.shape[1]
    H4 = 4 * H
    D = Wx.shape[1]
    n_out = W_hy.shape[0]
    loss_sum = 0.0

    I = np.empty((window, H))
    F = np.empty((window, H))
    G = np.empty((window, H))
    O = np.empty((window, H))
    C = np.empty((window, H))
    HC = np.empty((window, H))
    Hs = np.empty((window, H))
    Ys = np.empty((window, n_out))

    pos = start
    while pos < stop:
        w = stop - pos
        if w > window:
            w = window
        h_prev0 = h_carry.copy()
        c_prev0 = c_carry.copy()
        h_prev = h_prev0
        c_prev = c_prev0
        for s in range(w):
            x = X[order[pos + s]]
            t = T[order[pos + s]]
            z = np.dot(Wx, x) + np.dot(Wh, h_prev) + b
            zc = np.minimum(np.maximum(z, -500.0), 500.0)
            ig = 1.0 / (1.0 + np.exp(-zc[0:H]))
            fg = 1.0 / (1.0 + np.exp(-zc[H:2 * H]))
            gg = np.tanh(z[2 * H:3 * H])
            og = 1.0 / (1.0 + np.exp(-zc[3 * H:H4]))
            c = fg * c_prev + ig * gg
            hc = np.tanh(c)
            h = og * hc
            z_y = np.dot(W_hy, h) + b_y
            ex = np.exp(z_y - np.max(z_y))
            y = ex / np.sum(ex)
            I[s, :] = ig
            F[s, :] = fg
            G[s, :] = gg
            O[s, :] = og
            C[s, :] = c
            HC[s, :] = hc
            Hs[s, :] = h
            Ys[s, :] = y
            diff = y - t
            loss_sum += np.mean(diff * diff)
            h_prev = h
            c_prev = c

        gWx = np.zeros_like(Wx)
        gWh = np.zeros_like(Wh)
        gb = np.zeros_like(b)
        gW_hy = np.zeros_like(W_hy)
        gb_y = np.zeros_like(b_y)
        dh_next = np.zeros(H)
        dc_next = np.zeros(H)
        dz = np.empty(H4)
        for s in range(w - 1, -1, -1):
            x = X[order[pos + s]]
            t = T[order[pos + s]]
            y = Ys[s]
            g = (2.0 / n_out) * (y - t)
            delta_y = y * (g - np.dot(g, y))
            gW_hy += delta_y.reshape(n_out, 1) * Hs[s].reshape(1, H)
            gb_y += delta_y
            dh = np.dot(delta_y, W_hy) + dh_next
            ig = I[s]
            fg = F[s]
            gg = G[s]
            og = O[s]
            hc = HC[s]
            do = dh * hc
            dc = dh * og * (1.0 - hc * hc) + dc_next
            di = dc * gg
            dg = dc * ig
            if s > 0:
                cp = C[s - 1]
                hp = Hs[s - 1]
            else:
                cp = c_prev0
                hp = h_prev0
            df = dc * cp
            dz[0:H] = di * ig * (1.0 - ig)
            dz[H:2 * H] = df * fg * (1.0 - fg)
            dz[2 * H:3 * H] = dg * (1.0 - gg * gg)
            dz[3 * H:H4] = do * og * (1.0 - og)
            gWx += dz.reshape(H4, 1) * x.reshape(1, D)
            gWh += dz.reshape(H4, 1) * hp.reshape(1, H)
            gb += dz
            dh_next = np.dot(dz, Wh)
            dc_next = dc * fg

        if opt_kind == 0:
            Wx -= lr * gWx
            Wh -= lr * gWh
            b -= lr * gb
            W_hy -= lr * gW_hy
            b_y -= lr * gb_y
        else:
            vWx *= beta2
            vWx += (1.0 - beta2) * gWx * gWx
            mWx *= beta1
            mWx += (1.0 - beta1) * gWx / (np.sqrt(vWx) + eps)
            Wx -= lr * mWx
            vWh *= beta2
            vWh += (1.0 - beta2) * gWh * gWh
            mWh *= beta1
            mWh += (1.0 - beta1) * gWh / (np.sqrt(vWh) + eps)
            Wh -= lr * mWh
            vb *= beta2
            vb += (1.0 - beta2) * gb * gb
            mb *= beta1
            mb += (1.0 - beta1) * gb / (np.sqrt(vb) + eps)
            b -= lr * mb
            vW_hy *= beta2
            vW_hy += (1.0 - beta2) * gW_hy * gW_hy
            mW_hy *= beta1
            mW_hy += (1.0 - beta1) * gW_hy / (np.sqrt(vW_hy) + eps)
            W_hy -= lr * mW_hy
            vb_y *= beta2
            vb_y += (1.0 - beta2) * gb_y * gb_y
            mb_y *= beta1
            mb_y += (1.0 - beta1) * gb_y / (np.sqrt(vb_y) + eps)
            b_y -= lr * mb_y

        h_carry[:] = h_prev
        c_carry[:] = c_prev
        pos += w
    return loss_sum / (stop - start)


def lstm_eval(X, T, order, Wx, Wh, b, W_hy, b_y, stateless, sq_err):
    """LSTM evaluation: stateless resets h and c before every sample,
    otherwise state carries along the order starting from zero.

    Accumulates per-dimension squared error into sq_err; returns
    (mean mse loss, correct argmax count). No parameter is written.
    """
    H = Wh.shape[1]
    H4 = 4 * H
    n = order.shape[0]
    n_out = W_hy.shape[0]
    h = np.zeros(H)
    c = np.zeros(H)
    loss_sum = 0.0
    n_correct = 0
    for pos in range(n):
        if stateless == 1:
            h = np.zeros(H)
            c = np.zeros(H)
        x = X[order[pos]]
        t = T[order[pos]]
        z = np.dot(Wx, x) + np.dot(Wh, h) + b
        zc = np.minimum(np.maximum(z, -500.0), 500.0)
        ig = 1.0 / (1.0 + np.exp(-zc[0:H]))
        fg = 1.0 / (1.0 + np.exp(-zc[H:2 * H]))
        gg = np.tanh(z[2 * H:3 * H])
        og = 1.0 / (1.0 + np.exp(-zc[3 * H:H4]))
        c = fg * c + ig * gg
        h = og * np.tanh(c)
        z_y = np.dot(W_hy, h) + b_y
        ex = np.exp(z_y - np.max(z_y))
        y = ex / np.sum(ex)
        diff = y - t
        for j in range(n_out):
            sq_err[j] += diff[j] * diff[j]
        loss_sum += np.mean(diff * diff)
        if np.argmax(y) == np.argmax(t):
            n_correct += 1
    return loss_sum / n, n_correct
