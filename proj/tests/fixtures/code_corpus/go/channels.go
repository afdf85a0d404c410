package main

import "fmt"

func produce(n int, out chan<- int) {
	for i := 0; i < n; i++ {
		out <- i * i
	}
	close(out)
}

func main() {
	ch := make(chan int, 4)
	go produce(6, ch)
	total := 0
	for v := range ch {
		total += v
	}
	fmt.Println(total)
}
