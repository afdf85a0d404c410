package main

import "fmt"

type Heap struct {
	data []int
}

func (h *Heap) Push(v int) {
	h.data = append(h.data, v)
	i := len(h.data) - 1
	for i > 0 {
		p := (i - 1) / 2
		if h.data[p] <= h.data[i] {
			break
		}
		h.data[p], h.data[i] = h.data[i], h.data[p]
		i = p
	}
}

func (h *Heap) Pop() int {
	top := h.data[0]
	last := len(h.data) - 1
	h.data[0] = h.data[last]
	h.data = h.data[:last]
	i := 0
	for {
		l, r := 2*i+1, 2*i+2
		small := i
		if l < len(h.data) && h.data[l] < h.data[small] {
			small = l
		}
		if r < len(h.data) && h.data[r] < h.data[small] {
			small = r
		}
		if small == i {
			break
		}
		h.data[i], h.data[small] = h.data[small], h.data[i]
		i = small
	}
	return top
}

func main() {
	h := &Heap{}
	for _, v := range []int{5, 2, 8, 1, 9} {
		h.Push(v)
	}
	for range [5]int{} {
		fmt.Print(h.Pop(), " ")
	}
	fmt.Println()
}
